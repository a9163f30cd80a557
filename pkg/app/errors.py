class ToricError(Exception):
    """Base class for every rejection the toolkit reports to its caller."""


class SchemaError(ToricError):
    """A problem file that does not validate. Carries one message per offending location."""

    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


class HypothesisViolation(ToricError):
    """An input that breaks a precondition of the requested computation."""


class MissingEulerObstruction(HypothesisViolation):
    """Euler obstruction values needed by a formula are absent or unknown."""

    def __init__(self, variety: str, face_labels: list[str]):
        self.variety = variety
        self.face_labels = list(face_labels)
        super().__init__(f"missing Euler obstruction values for {variety} on: {', '.join(self.face_labels)}")
