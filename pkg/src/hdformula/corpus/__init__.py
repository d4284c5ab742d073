"""Formula corpora: JSONL records, level/line statistics and synthesis."""

from .records import DISPLAY_MODES, DOMAINS, CorpusRecord, load_corpus, record_from_obj, save_corpus
from .stats import LEVEL_GROUPS, LINE_BINS, StatTable, level_group, line_bin, stat_table
from .synth import MAX_LEVEL, SynthSpec, synth_corpus, synth_formula

__all__ = [
    "DISPLAY_MODES", "DOMAINS", "LEVEL_GROUPS", "LINE_BINS", "MAX_LEVEL",
    "CorpusRecord", "StatTable", "SynthSpec", "level_group", "line_bin",
    "load_corpus", "record_from_obj", "save_corpus", "stat_table", "synth_corpus", "synth_formula",
]
