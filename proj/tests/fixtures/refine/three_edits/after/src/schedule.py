def cosine(step, total):
    import math
    return 0.5 * (1 + math.cos(math.pi * step / total))
