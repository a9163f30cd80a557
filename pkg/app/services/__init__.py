# Exact toric invariant services
