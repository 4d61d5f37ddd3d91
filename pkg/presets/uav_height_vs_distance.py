from aeris import main, parse_args

config = parse_args()
config.command = "optimize"
config.scenario = "uav_height"
config.out = "output/uav_height_vs_distance"

if __name__ == '__main__':
    raise SystemExit(main(config))
