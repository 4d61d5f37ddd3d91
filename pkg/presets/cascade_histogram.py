import logging

from aeris import parse_args, write_results
from models.montecarlo import SimPlan, empirical_pdf_of_cascade_power
from scenarios import load_scenario

logger = logging.getLogger(__name__)

config = parse_args()
config.scenario = "default"
config.trials = 1_000_000
config.out = "output/cascade_histogram"
elements = (2, 5, 10, 20, 50)


def main(args):
    logging.basicConfig(
        format="%(asctime)s - %(levelname)s - %(name)s - %(message)s",
        datefmt="%m/%d/%Y %H:%M:%S",
        level=logging.INFO,
    )
    scenario = load_scenario(args.scenario)
    plan = SimPlan.from_scenario(scenario, trials=args.trials, seed=args.seed, progress=not args.no_progress)
    points, results = [], []
    for n in elements:
        hist = empirical_pdf_of_cascade_power(scenario, plan, n)
        rows = []
        for x, density, reference in zip(hist.centers, hist.density, hist.reference):
            row = {"x": float(x), "density": float(density), "reference": float(reference), "sup_distance": hist.sup_distance, "provenance": "simulated"}
            rows.append((row, dict(row)))
        points.append({"elements": n})
        results.append(rows)
        logger.info(f"  N = {n}: sup-distance = {hist.sup_distance:.4f}")
    write_results(args.out, "cascade_histogram", points, results)
    return 0


if __name__ == '__main__':
    raise SystemExit(main(config))
