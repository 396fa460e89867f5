"""Reference errors and orders used to tag acceptance rows.

Keys are ``(problem, k, variant)``; each entry maps N to
``(l2_error, l2_order)`` with ``None`` for the first order.  ``variant`` is
``None``, the value of ``a`` for ex53, or the beta for ex55.
"""
from __future__ import annotations

import math

Row = tuple[float, float | None]

REFERENCE: dict[tuple[str, int, object], dict[int, Row]] = {
    ("ex51", 1, None): {10: (0.0507931, None), 20: (0.0113953, 2.16), 40: (0.00278271, 2.03), 80: (0.000694474, 2.00)},
    ("ex51", 2, None): {10: (0.00395192, None), 20: (0.000559636, 2.82), 40: (7.24864e-05, 2.95), 80: (8.7753e-06, 3.05)},
    ("ex51", 3, None): {5: (0.000716136, None), 10: (3.6469e-05, 4.30), 20: (2.14439e-06, 4.09), 40: (1.18333e-07, 4.18)},
    ("ex51", 4, None): {5: (5.25422e-05, None), 10: (1.95246e-06, 4.75), 20: (6.42678e-08, 4.93), 40: (2.07446e-09, 4.95)},
    ("ex52", 1, None): {8: (0.294331, None), 16: (0.0617401, 2.25), 32: (0.0132547, 2.22), 64: (0.00316944, 2.06)},
    ("ex52", 2, None): {8: (0.0857554, None), 16: (0.0138187, 2.63), 32: (0.00185713, 2.90), 64: (0.000232547, 3.00)},
    ("ex52", 3, None): {4: (0.0241859, None), 8: (0.00123277, 4.29), 16: (7.05843e-05, 4.13), 32: (4.31039e-06, 4.03)},
    ("ex53", 1, 0.5): {8: (0.334674, None), 16: (0.0647558, 2.37), 32: (0.0138946, 2.22), 64: (0.00332186, 2.06)},
    ("ex53", 2, 0.5): {8: (0.090608, None), 16: (0.0145271, 2.64), 32: (0.00195239, 2.90), 64: (0.000248728, 2.97)},
    ("ex53", 3, 0.5): {4: (0.0250808, None), 8: (0.00129598, 4.27), 16: (7.42033e-05, 4.13), 32: (4.53139e-06, 4.03)},
    ("ex53", 1, math.sqrt(2) / 2): {8: (0.271457, None), 16: (0.0450757, 2.59), 32: (0.00969181, 2.22), 64: (0.00229956, 2.08)},
    ("ex53", 2, math.sqrt(2) / 2): {8: (0.0627901, None), 16: (0.0100189, 2.65), 32: (0.00134647, 2.90), 64: (0.000171541, 2.97)},
    ("ex53", 3, math.sqrt(2) / 2): {4: (0.018709, None), 8: (0.00089377, 4.39), 16: (5.11742e-05, 4.13), 32: (3.12506e-06, 4.03)},
    ("ex53", 1, math.sqrt(3) / 2): {8: (0.215662, None), 16: (0.0365488, 2.56), 32: (0.00797165, 2.20), 64: (0.0018959, 2.07)},
    ("ex53", 2, math.sqrt(3) / 2): {8: (0.0476107, None), 16: (0.00759121, 2.65), 32: (0.00102002, 2.90), 64: (0.000129942, 2.97)},
    ("ex53", 3, math.sqrt(3) / 2): {4: (0.0144092, None), 8: (0.000677035, 4.41), 16: (3.87644e-05, 4.13), 32: (2.36723e-06, 4.03)},
    ("ex55", 1, 0.0): {10: (0.0657588, None), 20: (0.0254149, 1.37), 40: (0.0117346, 1.11), 80: (0.00574456, 1.03)},
    ("ex55", 1, 0.4): {10: (0.0766309, None), 20: (0.0587613, 0.38), 40: (0.020537, 1.52), 80: (0.0039176, 2.39)},
    ("ex55", 1, 1.0): {10: (0.125475, None), 20: (0.0291785, 2.10), 40: (0.00598832, 2.28), 80: (0.00136537, 2.13)},
    ("ex55", 1, 4.0): {10: (0.0319942, None), 20: (0.00763239, 2.07), 40: (0.00192231, 1.99), 80: (0.000485668, 1.98)},
    ("ex55", 1, -1.0): {10: (0.0556805, None), 20: (0.0154405, 1.85), 40: (0.00431204, 1.84), 80: (0.00115667, 1.90)},
    ("ex55", 2, 0.0): {10: (0.00552409, None), 20: (0.00074947, 2.88), 40: (9.59851e-05, 2.96), 80: (1.20144e-05, 3.00)},
    ("ex55", 3, 0.0): {5: (0.000793078, None), 10: (4.06207e-05, 4.29), 20: (2.29901e-06, 4.14), 40: (1.36679e-07, 4.07)},
    ("ex55", 4, 0.0): {5: (4.44683e-05, None), 10: (1.5007e-06, 4.89), 20: (4.8107e-08, 4.96), 40: (1.51427e-09, 4.99)},
}

ERROR_RTOL = 0.05
ORDER_ATOL = {"ex51": 0.1}
DEFAULT_ORDER_ATOL = 0.15


def lookup(problem: str, k: int, variant=None) -> dict[int, Row] | None:
    for (p, kk, var), rows in REFERENCE.items():
        if p != problem or kk != k:
            continue
        if var is None and variant is None:
            return rows
        if var is not None and variant is not None and math.isclose(var, variant, rel_tol=1e-9, abs_tol=1e-12):
            return rows
    return None
