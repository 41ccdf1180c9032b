"""Kernel dispatch: compiled extension when available, numpy otherwise.

Set AIRCOV_PURE_PY=1 to force the numpy path (used by the parity tests and
the benchmark).
"""

import os

if os.environ.get("AIRCOV_PURE_PY"):
    from . import _kernels_py as _impl
else:
    try:
        from . import _kernels_cy as _impl
    except ImportError:
        from . import _kernels_py as _impl

BACKEND = _impl.NAME

svec_pack = _impl.svec_pack
svec_unpack = _impl.svec_unpack
psd_forward = _impl.psd_forward
psd_adjoint = _impl.psd_adjoint
psd_schur = _impl.psd_schur
