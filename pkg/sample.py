import logging

import numpy as np

from hemq.io.outputs import quantizer_json, resolve_output_dir, trajectory_csv, write_outputs
from hemq.io.recipes import mixture_grid_centers, mixture_grid_target
from hemq.metrics import assign_nearest
from hemq.models import KernelSpec, OptimizerConfig
from hemq.optimizers import shemq

logging.basicConfig(
    level=logging.INFO, format="%(asctime)s - %(name)s - %(levelname)s - %(message)s"
)

# 12 Gaussians on a 3x4 grid, three atoms per center expected
target = mixture_grid_target(sigma=0.15)
config = OptimizerConfig(batch_size=256, learning_rate=0.1, max_iterations=2000, seed=0)
record = shemq(KernelSpec.energy(), target, 36, config)

counts = np.bincount(
    assign_nearest(mixture_grid_centers(), record.quantizer.points), minlength=12
)
print(f"Initial batch loss: {record.initial_loss:.6f}")
print(f"Final batch loss:   {record.final_loss:.6f}")
print(f"Atoms per center:   {counts.tolist()}")

directory, note = resolve_output_dir("./output/mixture-grid")
written = write_outputs(
    directory,
    {
        "quantizer.json": quantizer_json(record.quantizer),
        "trajectory.csv": trajectory_csv(record),
    },
)
if note:
    print(note)
print(f"Saved: {', '.join(written)}")
