def loss(pos, neg, margin=1.0):
    return sum(max(0.0, margin - p + n) for p, n in zip(pos, neg)) / max(len(pos), 1)
