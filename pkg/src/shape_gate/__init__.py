"""Shape and scale gated object detection.

Training segments scenes into blobs, classifies each blob into a primitive
shape class, maps its bounding box to a square scale window, and files the
normalized feature vector into a (shape, window) cluster with a running mean.
Queries hit the cluster index first: if no cluster exists for the query's
shape and window, the blob is declared a new object without a single member
comparison.
"""

__version__ = "0.1.0"
