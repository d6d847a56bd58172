"""focalpipe: multi-focal microscope image classification and authentication.

Pipeline stages: optimal-focus selection over focal stacks, coarse-to-fine
grain segmentation, generalized feature extraction over transform planes,
Fisher-score feature selection, four classifiers (WND-5, decision tree,
random forest, softmax network), and vote-threshold open-set
authentication. A synthetic generator makes every stage verifiable.
"""

__version__ = "0.1.0"
