"""Packet-level intrusion detection with hex-word subword embeddings.

Packets are hex-encoded, cut into fixed-width words, and embedded as the
mean of word and character-n-gram vectors. The package trains a softmax
classifier or a skip-gram pre-training model on those vectors, plus a
Pegasos linear SVM on top of them.
"""
from .errors import PktEmbedError
from .kernels import active as _backend
from .model import EmbeddingModel, ModelConfig, init_model, packet_vector, predict
from .store import load_model, save_model
from .tokenizer import HexDocument, TokenizerConfig, Vocabulary, build_vocabulary
from .train import train_supervised, train_unsupervised

BACKEND = _backend.NAME

__all__ = [
    "BACKEND",
    "EmbeddingModel",
    "HexDocument",
    "ModelConfig",
    "PktEmbedError",
    "TokenizerConfig",
    "Vocabulary",
    "build_vocabulary",
    "init_model",
    "load_model",
    "packet_vector",
    "predict",
    "save_model",
    "train_supervised",
    "train_unsupervised",
]
