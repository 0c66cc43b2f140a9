"""Retrieval outputs shared by the neural and iterative retrievers."""

from __future__ import annotations

from dataclasses import dataclass, field

from .fileio import atomic_write, write_field
from .optics import ComplexField

__all__ = ["RetrievalResult", "write_result", "read_sidecar"]


@dataclass(frozen=True, eq=False)
class RetrievalResult:
    field: ComplexField
    method: str
    wall_time_s: float
    iterations: int = None
    checkpoint_id: str = None
    extra: dict = field(default_factory=dict)

    def sidecar_text(self):
        rows = [("method", self.method),
                ("wall_ms", f"{self.wall_time_s * 1e3:.6f}")]
        if self.iterations is not None:
            rows.append(("iterations", str(self.iterations)))
        if self.checkpoint_id is not None:
            rows.append(("checkpoint", self.checkpoint_id))
        rows.extend((k, str(v)) for k, v in sorted(self.extra.items()))
        return "".join(f"{k}\t{v}\n" for k, v in rows)


def write_result(path, result):
    """Write the field as CFLD plus a ``<path>.txt`` tab-separated sidecar."""
    write_field(path, result.field)
    atomic_write(str(path) + ".txt", result.sidecar_text().encode())


def read_sidecar(path):
    out = {}
    with open(path) as fh:
        for line in fh:
            if line.strip() and not line.startswith("#"):
                k, v = line.rstrip("\n").split("\t", 1)
                out[k] = v
    return out
