from aeris import main, parse_args

config = parse_args()
config.command = "metrics"
config.scenario = "height_sweep"
config.grid = ["height=100:1000:50"]
config.out = "output/outage_vs_height"
# config.grid = ["height=100:1000:50", "elements=30:130:50"]

if __name__ == '__main__':
    raise SystemExit(main(config))
