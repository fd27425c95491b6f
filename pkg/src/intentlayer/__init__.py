"""intentlayer: semi-automatic intent annotation for slot-annotated
dialogue corpora, with joint intent+slot reference models, a tri-training
engine, a human review service, and a full evaluation suite."""

__version__ = "0.1.0"
