"""Hold'em data: cards, hand evaluation, hand strength, hand histories,
features and MIVAT over recorded board deals."""

from .cards import Card, decode_score, evaluate_7card, evaluate_many, format_cards, parse_cards
from .features import (
    FEATURE_DIM,
    INTERPRETATIONS,
    HoldemFeatures,
    StreetSnapshot,
    extract_features,
    history_key,
    parse_history_key,
    snapshot,
)
from .folds import kfold_split, subsample_training, train_test_folds
from .history import Action, HandHistory, iter_hands, parse_hand, read_hands, serialize, validate_hand, write_hands
from .mivat import DEFAULT_TRACKED, TRACKABLE, chance_nodes, decompose_hands, mivat_decompose_hand, realized_keys
from .strength import StrengthMode, hand_strength
from .synth import generate_hand, generate_hands

__all__ = [
    "Action",
    "Card",
    "DEFAULT_TRACKED",
    "FEATURE_DIM",
    "HandHistory",
    "HoldemFeatures",
    "INTERPRETATIONS",
    "StreetSnapshot",
    "StrengthMode",
    "TRACKABLE",
    "chance_nodes",
    "decode_score",
    "decompose_hands",
    "evaluate_7card",
    "evaluate_many",
    "extract_features",
    "format_cards",
    "generate_hand",
    "generate_hands",
    "hand_strength",
    "history_key",
    "iter_hands",
    "kfold_split",
    "mivat_decompose_hand",
    "parse_cards",
    "parse_hand",
    "parse_history_key",
    "read_hands",
    "realized_keys",
    "serialize",
    "snapshot",
    "subsample_training",
    "train_test_folds",
    "validate_hand",
    "write_hands",
]
