"""Vertex-reinforced random walks and linear replicator dynamics on weighted graphs."""
