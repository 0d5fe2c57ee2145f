"""Information-content analysis of exact toy autoregressive language models.

Scores sequences by information content, estimates model entropy exactly
and by Monte Carlo, runs standard decoding strategies, builds typical
sets, and tests whether highly rated text concentrates in the one-sigma
entropy band.
"""

from .errors import (CorpusError, DegenerateSamplesError, InfobandError,
                     ModelError, PipelineError, SequenceError,
                     SupportCapExceeded)
from .lm import (IidModel, LanguageModel, NgramModel, PromptConditionedModel,
                 Sequence, TableModel, Vocabulary, enumerate_support,
                 load_ngram, ngram_from_dict, ngram_to_dict, read_corpus,
                 save_ngram, sequence_log_prob, train_ngram)
from .information import (EntropyEstimate, InformationProfile, SweepResult,
                          conditional_entropy_sweep, derive_seed,
                          estimate_from_values, exact_entropy,
                          information_content, mc_entropy, sample_information)
from .decoding import (Candidate, DecodeConfig, ancestral_sample, beam_search,
                       decode, decode_one, diverse_beam_search, greedy_decode,
                       mbr_decode, nucleus_sample, top_k_sample,
                       truncate_nucleus, truncate_top_k, utility_ngram_overlap)
from .typicality import (InclusionReport, LocalTypicalityResult, SupportTable,
                         TypicalSetReport, WindowBandCheck,
                         locally_typical_check, locally_typical_set,
                         typical_mass_growth, typical_set,
                         verify_local_global_inclusion)
from .stats import (BandTestResult, ScoreBandSplit, WelchResult,
                    band_membership, band_vs_chance_test, score_band_split,
                    t_cdf, welch_t_test)
from .pipeline import (ExperimentConfig, RatingsRecord, Report,
                       bin_values, default_decode_suite, derive_contexts,
                       emit_report, join_ratings, read_ratings_csv,
                       report_from_dict, report_json, report_to_dict,
                       run_experiment)

__version__ = "0.1.0"
