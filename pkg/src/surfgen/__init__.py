"""Trainable surface generation from flat attribute sets.

Three generators share one corpus format:

* :mod:`surfgen.nlg1` returns the most frequent training template,
* :mod:`surfgen.nlg2` runs a beam search over a maxent n-gram model,
* :mod:`surfgen.nlg3` grows dependency trees with a maxent child model.
"""

from .corpus import (
    DependencyTree,
    Template,
    TreeNode,
    extract_attribute_set,
    fill_slots,
    linearize,
    parse_template_line,
    parse_tree_record,
)
from .kernels import BACKEND
from .maxent import STOP, MaxentModel, conditional_prob, instantiate_features, log_likelihood, train_iis
from .nlg1 import FrequencyTable, nlg1_generate, train_nlg1
from .nlg2 import Nlg2Config, nlg2_generate, nlg2_search, train_nlg2
from .nlg3 import Nlg3Config, nlg3_generate, nlg3_search, train_nlg3, tree_probability

__version__ = "0.1.0"
