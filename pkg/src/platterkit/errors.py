"""Exception types shared across the package.

Every error carries a stable machine-readable ``code`` so the HTTP service
can surface module errors verbatim. Parsing errors additionally carry the
1-based line number of the offending input line.
"""

from __future__ import annotations


class PlatterError(Exception):
    """Base class for all errors raised by platterkit."""

    code = "error"


class FormatError(PlatterError, ValueError):
    """A text input (class list, label file, detection file) is malformed."""

    code = "format_error"

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class EmptyRegistryError(FormatError):
    code = "empty_registry"


class DuplicateClassError(FormatError):
    code = "duplicate_class"


class MalformedLineError(FormatError):
    code = "malformed_line"


class UnknownClassError(FormatError):
    code = "unknown_class"


class BoxOutOfRangeError(FormatError):
    code = "box_out_of_range"


class ConfidenceOutOfRangeError(FormatError):
    code = "confidence_out_of_range"


class NoEvaluableClassesError(PlatterError, ValueError):
    """No class has any ground truth, so mAP is undefined."""

    code = "no_evaluable_classes"


class MissingDishCaloriesError(PlatterError, LookupError):
    """A dish count refers to a class the calorie table does not cover."""

    code = "missing_dish_calories"

    def __init__(self, class_id: int):
        super().__init__(f"no calorie entry for class {class_id}")
        self.class_id = class_id


class UnknownUserError(PlatterError, LookupError):
    code = "unknown_user"

    def __init__(self, user_id: str):
        super().__init__(f"unknown user {user_id!r}")
        self.user_id = user_id


class NoGoalError(PlatterError):
    """The user has no calorie goal yet, so tracker state is undefined."""

    code = "no_goal"


class EmptyMealError(PlatterError, ValueError):
    code = "empty_meal"


class InvalidRangeError(PlatterError, ValueError):
    code = "invalid_range"
