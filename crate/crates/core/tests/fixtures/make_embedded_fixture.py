"""Builds the tiny embedded-backend fixture: tokenizer.json, model.onnx, probe.json.

The model is a one-layer self-attention classifier reading the [CLS] slot.
probe.json holds torch reference scores used by the Rust parity test.
"""
import json
import math

import torch
from tokenizers import Tokenizer, models, normalizers, pre_tokenizers

torch.manual_seed(0)

WORDS = ("the a of in is was what who when where which how many did does river city king "
         "war year population capital built founded music team river bank museum football "
         "painting born history france paris london rome empire church school science "
         "planet moon sun water energy light computer network protein cell virus").split()
SPECIALS = ["[PAD]", "[UNK]", "[CLS]", "[SEP]"]
vocab = {tok: i for i, tok in enumerate(SPECIALS + sorted(set(WORDS)))}

tok = Tokenizer(models.WordLevel(vocab=vocab, unk_token="[UNK]"))
tok.normalizer = normalizers.Lowercase()
tok.pre_tokenizer = pre_tokenizers.Whitespace()
tok.save("embedded/tokenizer.json")

DIM = 16


class TinyEncoder(torch.nn.Module):
    def __init__(self):
        super().__init__()
        self.tokens = torch.nn.Embedding(len(vocab), DIM)
        self.segments = torch.nn.Embedding(2, DIM)
        self.q = torch.nn.Linear(DIM, DIM)
        self.k = torch.nn.Linear(DIM, DIM)
        self.v = torch.nn.Linear(DIM, DIM)
        self.pool = torch.nn.Linear(DIM, DIM)
        self.head = torch.nn.Linear(DIM, 2)

    def forward(self, input_ids, attention_mask, token_type_ids):
        h = self.tokens(input_ids) + self.segments(token_type_ids)
        scores = self.q(h) @ self.k(h).transpose(1, 2) / math.sqrt(DIM)
        scores = scores + (1.0 - attention_mask.unsqueeze(1).to(h.dtype)) * -10000.0
        h = h + torch.softmax(scores, dim=-1) @ self.v(h)
        return self.head(torch.tanh(self.pool(h[:, 0, :])))


model = TinyEncoder().eval()
dummy = torch.zeros(1, 6, dtype=torch.long)
torch.onnx.export(
    model,
    (dummy, torch.ones(1, 6, dtype=torch.long), dummy),
    "embedded/model.onnx",
    input_names=["input_ids", "attention_mask", "token_type_ids"],
    output_names=["logits"],
    dynamic_axes={n: {1: "sequence"} for n in ["input_ids", "attention_mask", "token_type_ids"]},
    opset_version=13,
    dynamo=False,
)


def encode(text):
    return tok.encode(text, add_special_tokens=False).ids


def format_ids(query, context, budget):
    q, c = encode(query), encode(context)
    room = budget - len(q) - 3
    c = c[:room]
    ids = [vocab["[CLS]"]] + c + [vocab["[SEP]"]] + q + [vocab["[SEP]"]]
    types = [0] * (len(c) + 2) + [1] * (len(q) + 1)
    return ids, types


PAIRS = [
    ("when was the city founded", "the city of rome was founded in the year of the empire"),
    ("who built the church", "the church in paris was built by the king"),
    ("what is the population of london", "london is the capital and the population is many"),
    ("how many moon", "the planet has a moon and the sun gives light"),
    ("which protein", "a virus cell protein"),
    ("where was the painting born", "music and football in the school"),
    ("what is energy", "energy is light and water and energy"),
    ("who was king of france", "france had a king in the year of the war " * 4),
    ("what network", "the computer network in the museum of science " * 5),
    ("did the team win", "the football team of the city"),
    ("when was the war", "the war was in the year"),
    ("is the river in paris", "the river bank in paris was built"),
    ("what does the virus do", "the virus is in the cell and the protein"),
    ("which school", "history of the school in london " * 6),
    ("how is the planet", "zebra quokka axolotl"),
    ("what is science", "science"),
    ("who founded the museum", "the museum was founded by the king of france in paris"),
    ("what is the capital of france", "paris is the capital of france"),
    ("where is the sun", "the sun and the moon and the planet and the water and light " * 3),
    ("how many team", "the team"),
]
BUDGETS = [64, 24, 16]

probe = []
with torch.no_grad():
    for i, (query, context) in enumerate(PAIRS):
        budget = BUDGETS[i % len(BUDGETS)]
        ids, types = format_ids(query, context, budget)
        t = torch.tensor([ids])
        logits = model(t, torch.ones_like(t), torch.tensor([types]))
        score = torch.softmax(logits, dim=-1)[0, 1].item()
        probe.append({"query": query, "context": context, "max_sequence_length": budget,
                      "input_ids": ids, "token_type_ids": types, "score": score})

with open("embedded/probe.json", "w") as f:
    json.dump(probe, f, indent=1)
    f.write("\n")
