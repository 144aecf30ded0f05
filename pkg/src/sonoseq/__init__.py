"""Streaming audio-to-symbol prediction toolkit.

Audio is segmented by onset detection, each event is described by a
52-dimensional timbre vector, events are clustered online into a
growing/shrinking symbol alphabet, and sequence models that track the
alphabet's structural changes predict the next symbol and its timing.
"""

from .boltzmann import ConceptualBoltzmann, anneal_schedule
from .cobweb import ClusterTree, ConceptNode, StructuralEvent, category_utility
from .features import (ioi_feature, mel_filterbank, mfcc_frames,
                       timbre_descriptor)
from .hngram import HierarchicalNgram
from .metrics import (adjusted_rand_index, greedy_label_mapping,
                      onset_fmeasure, prediction_ari, rand_index)
from .onsets import (adaptive_threshold, detect_onsets, detection_function,
                     pick_onsets, princarg, read_wav, stft, write_wav)
from .pipeline import (EventRecord, OnlinePredictor, PipelineConfig,
                       audit_causality, grid_search, run_expectation,
                       run_onsets, run_prediction, run_transcription)
from .sequences import (apply_skip_noise, apply_switch_noise, bell_number,
                        crossfade_pair_track, enumerate_set_partitions,
                        generate_sequence, synthesize_labeled_audio)

__version__ = "0.1.0"
