"""MUB-based uplink pilot codebooks and multi-cell massive MIMO training simulator."""
