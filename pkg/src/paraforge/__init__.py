"""paraforge: paraphrase generation by clustering a monolingual corpus,
training unsupervised translation models on cluster pairs, and distilling
their filtered outputs into a single sequence-to-sequence paraphraser."""

__version__ = "0.1.0"
