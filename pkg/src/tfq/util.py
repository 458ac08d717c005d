"""Small shared helpers."""
from __future__ import annotations

import os


def atomic_write_bytes(path: str | os.PathLike, data: bytes) -> None:
    """Write a file via temp-then-rename so partial files never persist."""
    path = os.fspath(path)
    tmp = f"{path}.tmp.{os.getpid()}"
    try:
        with open(tmp, "wb") as f:
            f.write(data)
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)


def atomic_write_text(path: str | os.PathLike, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))
