"""Truck-and-drone routing: FSTSP and TSP-D."""
