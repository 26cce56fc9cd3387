import math
import re

_NUM = r"[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?"
_COMPLEX_RE = re.compile(
    rf"^\s*(?:(?P<re>{_NUM})(?P<im>[+-](?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)?i|(?P<real>{_NUM}))\s*$"
)


def format_complex(z, digits=15):
    """Render as ``re+imi`` with ``digits`` significant digits."""
    z = complex(z)
    re_, im = z.real + 0.0, z.imag + 0.0
    return f"{re_:.{digits}g}{im:+.{digits}g}i"


def parse_complex(text):
    """Parse ``re``, ``re+imi``, ``re-imi`` or ``imi``."""
    m = _COMPLEX_RE.match(text)
    if m is None:
        raise ValueError(f"not a complex number: {text!r}")
    if m.group("real") is not None:
        value = complex(float(m.group("real")), 0.0)
    elif m.group("im") is not None:
        value = complex(float(m.group("re")), float(m.group("im")))
    else:
        # "3i" matched as re-with-trailing-i and no imaginary group
        value = complex(0.0, float(m.group("re")))
    if not (math.isfinite(value.real) and math.isfinite(value.imag)):
        raise ValueError(f"non-finite complex number: {text!r}")
    return value
