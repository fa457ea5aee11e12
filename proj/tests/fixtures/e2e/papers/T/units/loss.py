def loss(pos, neg, margin=0.5):
    return sum(max(0.0, margin - p + n) for p, n in zip(pos, neg)) / max(len(pos), 1)
