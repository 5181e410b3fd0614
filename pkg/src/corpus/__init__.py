from .records import (
    DatasetManifest,
    EditScript,
    ManifestEntry,
    PhonemeTrack,
    Utterance,
)
from .manifest import assign_splits, load_manifest, save_manifest
from .alignment import load_alignment, reconcile_durations
from .context_window import build_context_window
from .edit_script import load_edit_scripts
from .lexicon import Lexicon, default_lexicon
