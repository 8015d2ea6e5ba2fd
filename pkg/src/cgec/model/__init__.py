from .crf import crf_log_partition, crf_neg_log_likelihood, crf_sequence_score, viterbi_decode
from .decoding import beam_search_decode, greedy_decode
from .network import GecModel, decode_step, encode, fuse_embeddings
