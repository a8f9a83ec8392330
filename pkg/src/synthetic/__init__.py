from src.synthetic.corpus import (
    DEFAULT_ZOO_SIZES,
    CorpusConfig,
    build_synth_corpus,
    corpus_entries,
    corpus_graphs,
    default_styles,
    write_corpus,
)
from src.synthetic.generator import SIZES_23, SIZES_25, SIZES_27, SynthConfig, generate_cnn, measured_sizes
from src.synthetic.oracle import DeviceProfile, base_latency, default_profiles, load_profiles, synth_latency

__all__ = [
    "DEFAULT_ZOO_SIZES",
    "SIZES_23",
    "SIZES_25",
    "SIZES_27",
    "CorpusConfig",
    "DeviceProfile",
    "SynthConfig",
    "base_latency",
    "build_synth_corpus",
    "corpus_entries",
    "corpus_graphs",
    "default_profiles",
    "default_styles",
    "generate_cnn",
    "load_profiles",
    "measured_sizes",
    "synth_latency",
    "write_corpus",
]
