from aeris import main, parse_args

config = parse_args()
config.command = "select"
config.scenario = "mode_crossover"
config.out = "output/mode_crossover"
config.workers = 4

if __name__ == '__main__':
    raise SystemExit(main(config))
