"""Collapse models and the experiment services built on them"""
