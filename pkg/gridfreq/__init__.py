# -*- coding: utf-8 -*-
"""Phasor-domain frequency response simulator for mixed SG / GFM fleets."""

__version__ = '0.1.0'
