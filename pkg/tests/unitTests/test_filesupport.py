from pathlib import Path

import pandas as pd
import pytest

from emoselect.filesupport import OutputArtifact, is_valid_filename, safeFileStem


def test_is_valid_filename_valid_cases() -> None:
    assert is_valid_filename("indicator.csv")
    assert is_valid_filename("ecdf-n20-0123456789ab.svg")
    assert is_valid_filename("BA-SPX-NS_lambda_3n")


def test_is_valid_filename_dot_and_dotdot() -> None:
    assert not is_valid_filename(".")
    assert not is_valid_filename("..")


def test_is_valid_filename_reserved_names() -> None:
    assert not is_valid_filename("CON")
    assert not is_valid_filename("con")
    for i in range(1, 10):
        assert not is_valid_filename(f"COM{i}")
        assert not is_valid_filename(f"LPT{i}")


def test_is_valid_filename_invalid_characters() -> None:
    assert not is_valid_filename("BA-SPX-NS:lambda=3n")
    assert not is_valid_filename("a|b")
    assert not is_valid_filename("x=y")


@pytest.mark.parametrize(
    "original, expected",
    [
        ("BA-SPX-NS:lambda=3n", "BA-SPX-NS_lambda_3n"),
        ("NSGA-II", "NSGA-II"),
        ("p06-n20", "p06-n20"),
        ("some   label", "some_label"),
        ("CON", "unnamed"),
        ("", "unnamed"),
    ],
)
def test_safeFileStem(original, expected) -> None:
    assert safeFileStem(original) == expected


def test_safeFileStem_custom_fallback() -> None:
    assert safeFileStem("NUL", fallback="default") == "default"


def test_artifact_from_frame_uses_plain_csv() -> None:
    frame = pd.DataFrame({"evals": [69, 89], "icoco": [1.5, 0.25]})
    artifact = OutputArtifact.fromFrame(frame, "indicator.csv")
    assert artifact.fileContent == b"evals,icoco\n69,1.5\n89,0.25\n"
    assert str(artifact) == f'"indicator.csv" [{len(artifact.fileContent)} B]'


def test_artifact_str_large_content() -> None:
    assert str(OutputArtifact(b"x" * 1024, "large.bin")) == '"large.bin" [1 KiB]'


def test_saveToDirectory_creates_nested_directories(tmp_path: Path) -> None:
    artifact = OutputArtifact.fromText("{}\n", "record.json")
    directory = tmp_path / "runs" / "BC-SPX-NS" / "p01-n2" / "seed-1"
    target = artifact.saveToDirectory(directory)
    assert target == directory / "record.json"
    assert target.read_text() == "{}\n"


def test_saveToDirectory_overwrites(tmp_path: Path) -> None:
    OutputArtifact.fromText("old", "a.txt").saveToDirectory(tmp_path)
    OutputArtifact.fromText("new", "a.txt").saveToDirectory(tmp_path)
    assert (tmp_path / "a.txt").read_text() == "new"


def test_saveToDirectory_existing_file_path_error(tmp_path: Path) -> None:
    existing = tmp_path / "existing_file.txt"
    existing.write_text("I'm a file, not a directory!")
    with pytest.raises(ValueError, match="is an existing file, not a directory"):
        OutputArtifact(b"x", "output.txt").saveToDirectory(existing)


def test_saveToFilepath_errors(tmp_path: Path) -> None:
    artifact = OutputArtifact(b"x", "output.txt")
    with pytest.raises(ValueError, match="Parent directory .* does not exist"):
        artifact.saveToFilepath(tmp_path / "missing" / "output.txt")
    with pytest.raises(ValueError, match="is not valid"):
        artifact.saveToFilepath(tmp_path / "a=b.txt")


def test_saveToFilepath_leaves_no_partial_file(tmp_path: Path) -> None:
    OutputArtifact(b"evals\n", "indicator.csv").saveToFilepath(tmp_path / "indicator.csv")
    assert sorted(p.name for p in tmp_path.iterdir()) == ["indicator.csv"]
