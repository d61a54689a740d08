"""Exception hierarchy for surfgen."""


class SurfgenError(ValueError):
    pass


# corpus / treebank input

class CorpusError(SurfgenError):
    pass


class EmptyLine(CorpusError):
    pass


class DuplicateAttribute(CorpusError):
    def __init__(self, attribute, where=""):
        self.attribute = attribute
        msg = f"attribute {attribute} appears more than once"
        if where:
            msg += f" in {where!r}"
        super().__init__(msg)


class MissingBinding(CorpusError):
    def __init__(self, attribute):
        self.attribute = attribute
        super().__init__(f"no value bound for {attribute}")


class TreebankError(CorpusError):
    pass


class Cycle(TreebankError):
    pass


class MultipleRoots(TreebankError):
    pass


class IndexOutOfRange(TreebankError):
    pass


class NonProjective(TreebankError):
    pass


# generation

class GenerationError(SurfgenError):
    pass


class EmptyAttributeSet(GenerationError):
    pass


class UnknownAttribute(GenerationError):
    def __init__(self, attributes):
        self.attributes = tuple(sorted(attributes))
        super().__init__("attribute(s) never seen in training: " + ", ".join(self.attributes))


class AttributeMismatch(GenerationError):
    pass


# evaluation

class EvaluationError(SurfgenError):
    pass


class MissingJudgment(EvaluationError):
    def __init__(self, system, attribute_set):
        self.system = system
        self.attribute_set = attribute_set
        super().__init__(f"system {system!r} has no judgment for attribute set {{{attribute_set}}}")


class DuplicateJudgment(EvaluationError):
    def __init__(self, system, attribute_set):
        self.system = system
        self.attribute_set = attribute_set
        super().__init__(f"system {system!r} judged attribute set {{{attribute_set}}} more than once")
