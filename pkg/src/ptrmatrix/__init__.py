"""Query-counting simulator for the pointer-matrix function and its randomized algorithms."""
