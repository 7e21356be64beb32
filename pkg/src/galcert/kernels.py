"""Backend selection: compiled transport kernel when available, else pure Python.

Both backends implement the same Dormand-Prince 5(4) stepping; the benchmark
in benchmarks/bench_kernels.py compares them directly.
"""

from . import _kernels_py as python_backend

try:  # pragma: no cover - depends on the build environment
    from . import _kernels as compiled_backend

    _impl = compiled_backend
except ImportError:  # pragma: no cover
    compiled_backend = None
    _impl = python_backend

BACKEND = _impl.BACKEND
KernelError = python_backend.KernelError
transport_poly_segments = _impl.transport_poly_segments
dp45 = python_backend.dp45


def _normalize_kernel_errors():
    """The compiled backend raises its own KernelError; map it to the shared one."""
    if compiled_backend is None:
        return transport_poly_segments

    def wrapped(*args, **kwargs):
        try:
            return compiled_backend.transport_poly_segments(*args, **kwargs)
        except compiled_backend.KernelError as exc:  # pragma: no cover
            raise KernelError(str(exc)) from exc

    return wrapped


if compiled_backend is not None:
    transport_poly_segments = _normalize_kernel_errors()
