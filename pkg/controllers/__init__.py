"""
Training, decoding, synthesis, ingest and evaluation controllers
"""
