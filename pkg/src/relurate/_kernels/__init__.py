"""Kernel backend selection.

The hot loops (batched network evaluation and the per-minibatch training
step) have two interchangeable implementations:

* ``_ckern`` — Cython extension compiled at install time;
* ``pyref`` — pure numpy, always available.

The compiled backend is used when importable.  Set ``RELURATE_KERNEL=py``
or ``RELURATE_KERNEL=c`` to force a backend (the latter raises if the
extension is missing).  ``benchmarks/benchmark_kernels.py`` compares the two.
"""
import os

from . import pyref

HINGE = pyref.HINGE
LOGISTIC = pyref.LOGISTIC

_requested = os.environ.get("RELURATE_KERNEL", "").strip().lower()

if _requested == "py":
    _impl = pyref
else:
    try:
        from . import _ckern as _impl  # type: ignore[attr-defined]
    except ImportError:
        if _requested == "c":
            raise ImportError(
                "RELURATE_KERNEL=c requested but the compiled extension is "
                "not available; build it with `pip install -e .` or "
                "`python setup.py build_ext --inplace`"
            )
        _impl = pyref

BACKEND = _impl.BACKEND

forward = _impl.forward
train_step = _impl.train_step

# The gradient decomposition is only exposed by the reference backend; the
# compiled backend fuses it inside train_step.  Gradient checks always go
# through the reference implementation.
gradients = pyref.gradients
loss_values = pyref.loss_values
loss_subgrad = pyref.loss_subgrad


def get_backend(name):
    """Return the kernel module for ``name`` in {'py', 'c'}; None if absent."""
    if name == "py":
        return pyref
    try:
        from . import _ckern
        return _ckern
    except ImportError:
        return None
