"""Topological classification of positive correlation networks.

Pipeline: labeled multichannel time series -> both-positive correlation
network -> ordinary/extended persistence diagrams -> K-means diagram
features -> autoencoder + PCA + SVM classifier.
"""

__version__ = "0.1.0"
