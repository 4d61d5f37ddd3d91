from aeris import main, parse_args

config = parse_args()
config.command = "optimize"
config.scenario = "element_count"
# 108 mW and 1.08 W per element
low, high = 0.108, 1.08
config.grid = ["distance=500:2000:100", f"phase_power={low}:{high}:{high - low}"]
config.out = "output/element_count_vs_distance"

if __name__ == '__main__':
    raise SystemExit(main(config))
