from .alignment import Edit, EditSet, classify_corr_err_tokens, extract_edits, lcs
from .analysis import analyze_corpus, err_distance_stats, pos_divergence_rate
from .m2 import max_match_prf
from .metrics import PrfScore, f_beta, prf
