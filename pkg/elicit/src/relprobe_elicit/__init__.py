"""relprobe-elicit: turn LM checkpoints into response files and vocabulary
exports for the relation-probing evaluation."""

from .runner import ElicitationJob, elicit
from .vocab import export_vocabulary, single_token_words

__version__ = "0.1.0"

__all__ = ["ElicitationJob", "elicit", "export_vocabulary", "single_token_words", "__version__"]
