import os

os.environ.setdefault("HF_HUB_OFFLINE", "1")
os.environ.setdefault("TRANSFORMERS_OFFLINE", "1")

import pytest
import torch
from tokenizers import Tokenizer, normalizers, pre_tokenizers, processors
from tokenizers.models import WordPiece
from transformers import BertConfig, BertForMaskedLM, BertTokenizerFast

SPECIALS = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"]

WORDS = [
    "the", "a", "harbor", "village", "river", "market", "garden", "signal",
    "winter", "story", "music", "road", "tower", "bridge", "window",
    "letter", "mountain", "forest", "evening", "morning", "stone", "cloud",
    "field", "shadow", "corner", "voice", "paper", "engine", "anchor",
    "meadow", "lantern", "valley", "walking", "singing", "drifting",
    "fading", "turned", "opened", "closed", "floating", "gathered",
    "waited", "quickly", "slowly", "gently", "quietly", "barely", "openly",
    "near", "cow", "swam", "capital", "france", "paris", "is", "of",
    "##ing", "##s", "##ed",
]


@pytest.fixture(scope="session")
def model_dir(tmp_path_factory):
    """A vocabulary-complete randomly initialized BERT saved locally, so
    tests never touch the model hub."""
    out = tmp_path_factory.mktemp("tiny-bert")
    vocab = {w: i for i, w in enumerate([*SPECIALS, *WORDS])}
    wordpiece = Tokenizer(WordPiece(vocab, unk_token="[UNK]"))
    wordpiece.normalizer = normalizers.BertNormalizer(lowercase=True)
    wordpiece.pre_tokenizer = pre_tokenizers.BertPreTokenizer()
    wordpiece.post_processor = processors.TemplateProcessing(
        single="[CLS] $A [SEP]",
        pair="[CLS] $A [SEP] $B [SEP]",
        special_tokens=[("[CLS]", vocab["[CLS]"]), ("[SEP]", vocab["[SEP]"])],
    )
    tokenizer = BertTokenizerFast(
        tokenizer_object=wordpiece,
        unk_token="[UNK]",
        pad_token="[PAD]",
        cls_token="[CLS]",
        sep_token="[SEP]",
        mask_token="[MASK]",
    )
    tokenizer.save_pretrained(out)
    torch.manual_seed(0)
    config = BertConfig(
        vocab_size=len(vocab),
        hidden_size=32,
        num_hidden_layers=2,
        num_attention_heads=2,
        intermediate_size=64,
        max_position_embeddings=128,
    )
    BertForMaskedLM(config).save_pretrained(out)
    return str(out)
