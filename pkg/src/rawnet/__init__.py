"""rawnet: classify network traffic straight from its bytes.

Pipeline: read classic pcap captures, group packets into packet / flow /
session units, slice each packet by a header-retention category, encode
units into fixed-length scaled byte vectors, train a small from-scratch
1D convolutional classifier on them, and report accuracy/f1 plus
inference timing in grid-shaped reports.
"""

from .bench import (BenchLockHeldError, BenchReport, bench_inference,
                    write_bench_report)
from .config import ConfigError, PipelineConfig, load_config
from .encoder import (BadHexLineError, ByteSample, ClassTooSmallError,
                      Dataset, EmptyUnitError, HeaderCategory, build_dataset,
                      encode_unit, export_hex, import_hex, slice_category,
                      stratified_split, write_dataset_manifest)
from .ingest import (FiveTuple, HeaderLayout, MalformedHeaderError, PcapError,
                     PcapReader, RawPacket, TruncatedRecordError,
                     UnknownMagicError, five_tuple_of, parse_layout,
                     read_pcap, write_pcap)
from .metrics import (EmptyMatrixError, IncompleteGridWarning,
                      LengthMismatchError, MetricsReport,
                      REFERENCE_BINARY_IOT23, REFERENCE_MULTILABEL_IOT23,
                      confusion, emit_report, metrics, write_metrics_report)
from .nn import (CorruptModelFileError, DivergedLossError, Network,
                 NetworkConfig, ShapeMismatchError, StaleCacheError,
                 TrainConfig, TrainHistory, load_model, predict,
                 predict_batch, save_model, train)
from .splitter import (Representation, SessionKey, SplitResult, TrafficUnit,
                       split, split_flows, split_packets, split_sessions,
                       write_manifest)
from .synth import (ClassSpec, SpecConflictError, SynthSpec, build_packet,
                    generate_fixture, synth_packets, write_class_captures)

__version__ = "0.1.0"
