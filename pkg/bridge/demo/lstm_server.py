#!/usr/bin/env python3
"""Demo: train a small LSTM token model and serve it over the bridge
protocol, so the extraction CLI can target a neural model end to end:

    python3 lstm_server.py corpus.txt --epochs 3 > /dev/null  # dry train
    pdfax extract --target "external:python3 lstm_server.py corpus.txt"

The corpus is one sequence per line, tokens separated by spaces (the
format `pdfax sample` writes).  Training is deliberately tiny -- two LSTM
layers, hidden size 50, a cyclic learning-rate schedule -- and the
resulting model, like any freshly trained network, varies across runs and
machines.  This script is a demonstration only and is not exercised by
the test suite.
"""

import argparse
import json
import sys

import torch
import torch.nn as nn
from torch.nn.utils.rnn import pad_sequence

PAD = -100  # loss mask value


class TokenLstm(nn.Module):
    def __init__(self, n_tokens: int, hidden: int = 50, layers: int = 2):
        super().__init__()
        # classes: one per alphabet token plus the stop marker; inputs add
        # a beginning-of-sequence symbol.
        self.n_classes = n_tokens + 1
        self.bos = self.n_classes
        self.embed = nn.Embedding(self.n_classes + 1, hidden)
        self.lstm = nn.LSTM(hidden, hidden, num_layers=layers,
                            batch_first=True)
        self.out = nn.Linear(hidden, self.n_classes)

    def forward(self, x):
        h, _ = self.lstm(self.embed(x))
        return self.out(h)


def read_corpus(path):
    seqs = []
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            seqs.append(line.split())
    tokens = sorted({t for seq in seqs for t in seq})
    if not tokens:
        raise SystemExit("corpus %s has no tokens" % path)
    index = {t: i for i, t in enumerate(tokens)}
    encoded = [[index[t] for t in seq] for seq in seqs]
    return encoded, tokens


def train(model, seqs, epochs, batch_size, rng):
    stop = model.n_classes - 1
    opt = torch.optim.SGD(model.parameters(), lr=1e-3, momentum=0.9)
    sched = torch.optim.lr_scheduler.CyclicLR(
        opt, base_lr=1e-4, max_lr=5e-2, step_size_up=200)
    loss_fn = nn.CrossEntropyLoss(ignore_index=PAD)
    for epoch in range(epochs):
        order = rng.permutation(len(seqs))
        total = 0.0
        for start in range(0, len(order), batch_size):
            batch = [seqs[i] for i in order[start:start + batch_size]]
            xs = pad_sequence(
                [torch.tensor([model.bos] + s) for s in batch],
                batch_first=True, padding_value=stop)
            ys = pad_sequence(
                [torch.tensor(s + [stop]) for s in batch],
                batch_first=True, padding_value=PAD)
            opt.zero_grad()
            loss = loss_fn(model(xs).flatten(0, 1), ys.flatten())
            loss.backward()
            opt.step()
            sched.step()
            total += loss.item()
        print("epoch %d loss %.4f" % (epoch + 1, total), file=sys.stderr)


def serve(model, tokens):
    index = {t: i for i, t in enumerate(tokens)}
    names = tokens + ["$"]
    model.eval()
    for line in sys.stdin:
        if not line.strip():
            continue
        try:
            req = json.loads(line)
            rid = req["id"]
        except (ValueError, TypeError, KeyError):
            print(json.dumps({"id": -1, "error": "malformed request"}),
                  flush=True)
            continue
        if req.get("op") == "alphabet":
            print(json.dumps({"id": rid, "alphabet": tokens}), flush=True)
        elif req.get("op") == "next_dist":
            try:
                prefix = [index[t] for t in req.get("prefix", [])]
            except KeyError as e:
                print(json.dumps({"id": rid,
                                  "error": "unknown token %s" % e}),
                      flush=True)
                continue
            with torch.no_grad():
                x = torch.tensor([[model.bos] + prefix])
                probs = torch.softmax(model(x)[0, -1], dim=0)
            dist = {name: float(p) for name, p in zip(names, probs)}
            print(json.dumps({"id": rid, "dist": dist}), flush=True)
        else:
            print(json.dumps({"id": rid, "error": "unknown op"}), flush=True)


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("corpus")
    ap.add_argument("--epochs", type=int, default=3)
    ap.add_argument("--batch-size", type=int, default=64)
    ap.add_argument("--hidden", type=int, default=50)
    ap.add_argument("--layers", type=int, default=2)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    import numpy as np
    torch.manual_seed(args.seed)
    seqs, tokens = read_corpus(args.corpus)
    model = TokenLstm(len(tokens), hidden=args.hidden, layers=args.layers)
    train(model, seqs, args.epochs, args.batch_size,
          np.random.default_rng(args.seed))
    serve(model, tokens)


if __name__ == "__main__":
    main()
