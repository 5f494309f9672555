import pytest

from gepgame import errors


@pytest.mark.parametrize(
    "cls, base",
    [
        (errors.DimensionMismatch, ValueError),
        (errors.NotSymmetric, ValueError),
        (errors.NotSpd, ValueError),
        (errors.RankDeficient, ValueError),
        (errors.ConfigInvalid, ValueError),
        (errors.NonPositiveDenominator, ArithmeticError),
        (errors.StreamExhausted, RuntimeError),
        (errors.NotConverged, RuntimeError),
    ],
)
def test_errors_share_a_root_and_a_builtin_base(cls, base):
    assert issubclass(cls, errors.GepError) and issubclass(cls, base)
