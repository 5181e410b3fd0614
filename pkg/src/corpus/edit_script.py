import json
import logging
from pathlib import Path
from typing import List, Union

from src.corpus.records import EditScript
from src.utils.errors import CorpusError, EditScriptError

logger = logging.getLogger(__name__)


def parse_edit_script(row: dict) -> EditScript:
    if not isinstance(row, dict):
        raise EditScriptError("each line must be a JSON object")
    for key in ("id", "op", "word_start", "word_end"):
        if key not in row:
            raise EditScriptError(f"missing key {key!r}")
    try:
        span = (int(row["word_start"]), int(row["word_end"]))
    except (TypeError, ValueError) as e:
        raise EditScriptError(f"word span must be integers: {e}") from e
    return EditScript(
        utterance_id=str(row["id"]),
        operation=str(row["op"]),
        target_word_span=span,
        replacement_text=str(row.get("text") or ""),
    )


def load_edit_scripts(path: Union[str, Path]) -> List[EditScript]:
    """Reads JSON-lines edit scripts ``{id, op, word_start, word_end, text}``."""
    path = Path(path)
    if not path.exists():
        raise EditScriptError("edit script file not found", path)
    scripts = []
    with open(path, "r", encoding="utf-8") as f:
        for line_no, raw in enumerate(f, start=1):
            if not raw.strip():
                continue
            try:
                scripts.append(parse_edit_script(json.loads(raw)))
            except json.JSONDecodeError as e:
                raise EditScriptError(f"malformed JSON: {e.msg}", path, line_no) from e
            except CorpusError as e:
                raise EditScriptError(str(e), path, line_no) from e
    logger.info(f"Loaded {len(scripts)} edit scripts from {path}")
    return scripts
