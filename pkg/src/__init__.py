"""
tokeneeg - Alzheimer's EEG screening with a compact dilated-convolution classifier
"""
