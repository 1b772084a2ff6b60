"""Classify a few quadruples and show the kernel value attached to each class."""
from signcov.kernel import classify, h_kernel, h_kernel_by_average

quadruples = [
    [(0, 0), (1, 1), (2, 2), (3, 3)],
    [(0, 3), (1, 2), (2, 1), (3, 0)],
    [(0, 1), (1, 0), (2, 3), (3, 2)],
    [(0, 0), (1, 3), (2, 1), (3, 2)],
    [(0, 0), (0, 1), (1, 1), (1, 0)],
    [(0, 0), (0, 0), (0, 0), (0, 0)],
]
for pts in quadruples:
    print(f"{str(pts):36s} {classify(pts).name:13s} h = {h_kernel(pts)!s:5s} (by averaging: {h_kernel_by_average(pts)})")
