from aeris import main, parse_args

config = parse_args()
config.command = "optimize"
config.scenario = "irs_height"
config.out = "output/irs_height_vs_distance"
# config.grid = ["distance=500:1900:100", "elements=50:250:100"]

if __name__ == '__main__':
    raise SystemExit(main(config))
