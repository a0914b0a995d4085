"""
File helpers and the compiled Viterbi kernel
"""
