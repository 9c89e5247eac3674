"""Regenerates the checked-in rotated surface code detector error model.

d=3, 4 rounds, Z-basis memory, uniform depolarizing circuit noise p=0.001.
Repeat blocks are flattened and detector coordinates dropped so the output
stays inside the DEM subset the parser accepts.
"""
import re
import sys

import stim

P = 0.001
circuit = stim.Circuit.generated(
    "surface_code:rotated_memory_z",
    distance=3,
    rounds=4,
    after_clifford_depolarization=P,
    after_reset_flip_probability=P,
    before_measure_flip_probability=P,
    before_round_data_depolarization=P,
)
dem = circuit.detector_error_model(decompose_errors=True).flattened()
out = [f"# stim {stim.__version__} surface_code:rotated_memory_z d=3 rounds=4 p={P}"]
for line in str(dem).splitlines():
    line = re.sub(r"^(detector|logical_observable)\([^)]*\)", r"\1", line)
    out.append(line)
sys.stdout.write("\n".join(out) + "\n")
