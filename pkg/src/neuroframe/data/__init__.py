"""Dataset formats, manifest handling, splits and the synthetic generator."""

from .formats import (VideoSequence, dumps_eegr, loads_eegr, save_eegr, load_eegr,
                      load_eeg_csv, save_eeg_csv, dumps_feat, loads_feat, save_feat, load_feat,
                      save_feature_csv, load_feature_csv, dumps_vidg, loads_vidg, save_vidg,
                      load_vidg, dumps_pgm, loads_pgm, save_pgm, load_pgm, export_frames)
from .manifest import (Entry, DatasetManifest, SPLITS, DEFAULT_RATIOS, split_counts,
                       split_dataset, save_manifest, load_manifest)
from .synth import SynthConfig, SynthDataset, Utterance, synth_generate, write_dataset, render_frame

__all__ = [
    "VideoSequence", "dumps_eegr", "loads_eegr", "save_eegr", "load_eegr", "load_eeg_csv",
    "save_eeg_csv", "dumps_feat", "loads_feat", "save_feat", "load_feat", "save_feature_csv",
    "load_feature_csv", "dumps_vidg", "loads_vidg", "save_vidg", "load_vidg", "dumps_pgm",
    "loads_pgm", "save_pgm", "load_pgm", "export_frames", "Entry", "DatasetManifest", "SPLITS",
    "DEFAULT_RATIOS", "split_counts", "split_dataset", "save_manifest", "load_manifest",
    "SynthConfig", "SynthDataset", "Utterance", "synth_generate", "write_dataset", "render_frame",
]
