# # Scoring curves and rendering the report
#
# The metrics compare a predicted body and curve with a reference.  This
# script shows each metric on small hand-made shapes, then renders a report
# for a shifted copy of the phantom reference.

import numpy as np

from salsi import aggregate, curved, evaluate_inlines, frechet_distance, generate_phantom, render_report, salsim
from salsi.morphology import BoundaryPolyline

# ## Frechet distance and SalSIM on two parallel segments

a = np.column_stack([np.arange(20.0), np.full(20, 10.0)])
b = a + [0.0, 3.0]
print("Frechet distance", frechet_distance(a, b))
print("SalSIM on a 64x64 section", round(salsim(a, b, (64, 64)), 4))

# ## CurveD separates shapes that sit at the same distance

theta = np.linspace(0.0, np.pi, 64)
arc = np.column_stack([32 + 12 * np.cos(theta), 20 + 12 * np.sin(theta)])
flat = np.column_stack([np.linspace(44, 20, 64), np.full(64, 26.0)])
print("CurveD arc vs shifted arc", round(curved(arc, arc + [0.0, 2.0]), 4))
print("CurveD arc vs flat line", round(curved(arc, flat), 4))

# ## A report for a prediction that sits one sample too deep

phantom = generate_phantom()
ref_body = phantom.mask.bits
pred_body = np.roll(ref_body, 1, axis=0)
pred_lines = {
    k: BoundaryPolyline(line.points + [0.0, 1.0], inline=k)
    for k, line in phantom.polylines.items()
}
rows = evaluate_inlines(pred_body, ref_body, pred_lines, phantom.polylines)
print(render_report(aggregate(rows)))
