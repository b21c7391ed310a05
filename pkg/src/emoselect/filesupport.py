import re
from dataclasses import dataclass
from pathlib import Path
from typing import Self

import pandas as pd

from emoselect.stringutil import format_bytes

STEM_UNWANTED_RE = re.compile(r"[^\w.\-]+")  # \w includes '_'
FILE_UNWANTED_RE = re.compile(r'[<>:"/\\|?*=]')
RESERVED_NAMES = frozenset(
    {"CON", "AUX", "NUL", "PRN", *(f"{dev}{i}" for dev in ("COM", "LPT") for i in range(1, 10))}
)
CSV_LINE_TERMINATOR = "\n"
PARTIAL_SUFFIX = ".part"


def is_valid_filename(filename: str) -> bool:
    """Portable file name: not a dot entry, not a reserved device name and free
    of characters some file systems refuse."""
    return (
        filename not in {".", ".."}
        and filename.upper() not in RESERVED_NAMES
        and FILE_UNWANTED_RE.search(filename) is None
    )


def safeFileStem(original: str, fallback: str = "unnamed") -> str:
    """Directory or file stem for an algorithm label or problem id, e.g.
    ``BA-SPX-NS:lambda=3n`` becomes ``BA-SPX-NS_lambda_3n``."""
    stem = STEM_UNWANTED_RE.sub("_", "_".join(original.split()))
    return stem if stem and is_valid_filename(stem) else fallback


def frameToCsvBytes(frame: pd.DataFrame) -> bytes:
    """One header line, comma separated, '.' decimal, shortest round-trip floats."""
    return frame.to_csv(index=False, lineterminator=CSV_LINE_TERMINATOR).encode("utf-8")


@dataclass(slots=True, frozen=True)
class OutputArtifact:
    """Bytes of one output file, ready to be written under ``filename``."""

    fileContent: bytes
    filename: str

    @classmethod
    def fromText(cls, text: str, filename: str) -> Self:
        return cls(text.encode("utf-8"), filename)

    @classmethod
    def fromFrame(cls, frame: pd.DataFrame, filename: str) -> Self:
        return cls(frameToCsvBytes(frame), filename)

    def __str__(self) -> str:
        return f'"{self.filename}" [{format_bytes(len(self.fileContent))}]'

    def saveToFilepath(self, path: Path) -> None:
        """Write through a sibling ``.part`` file so readers never see a half
        written trace."""
        if not is_valid_filename(path.name):
            raise ValueError(f"Filename {path.name} is not valid")
        if path.parent.is_file():
            raise ValueError(f"Parent path {path.parent} is an existing file, not a directory")
        if not path.parent.is_dir():
            raise ValueError(f"Parent directory {path.parent} does not exist")
        partial = path.with_name(path.name + PARTIAL_SUFFIX)
        partial.write_bytes(self.fileContent)
        partial.replace(path)

    def saveToDirectory(self, directory: Path) -> Path:
        """Create ``directory`` as needed and write ``filename`` inside it."""
        if directory.is_file():
            raise ValueError(f"Path {directory} is an existing file, not a directory")
        directory.mkdir(parents=True, exist_ok=True)
        target = directory / self.filename
        self.saveToFilepath(target)
        return target
