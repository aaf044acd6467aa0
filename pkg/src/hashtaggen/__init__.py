"""Hashtag generation from e-commerce reviews.

Two trainable pipelines (BiLSTM seq2seq with additive attention; masked-LM
autoregressive decoding) over a cleaned review corpus, with a BLEU / NIST /
METEOR / human-score evaluation battery, a CLI and an annotation service.
"""

__version__ = "0.1.0"
