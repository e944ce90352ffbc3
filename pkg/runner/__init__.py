"""
Command plumbing: option resolution, run manifests, the experiment command base
"""
