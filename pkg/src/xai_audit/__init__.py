"""Auditing feature-based explanations of binary intrusion classifiers."""
