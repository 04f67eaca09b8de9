import logging

from optsort_cenarios import generate_scenario, save_scenario
from optsort_core import system_peak_capacity

logger = logging.getLogger(__name__)


def executar_generate(args, config):
    """
    Subcomando generate: grava um cenário sintético em YAML

    Returns:
        int: Código de saída
    """
    cenario = generate_scenario(n=args.n, k=args.k, load=args.load, kind=args.kind, seed=args.seed,
                                waves=args.waves, wave_size=args.wave_size, workers=args.workers,
                                efficiency_range=args.efficiency_range, name=args.name,
                                arrival_profile=args.arrival_profile, destination_mix=args.destination_mix)
    save_scenario(cenario, args.out)
    capacidade = system_peak_capacity(cenario.layout, cenario.forecast.shift_length)
    print(f"Cenário {cenario.name} gravado em {args.out}")
    print(f"Carga prevista: {cenario.forecast.total}  capacidade do sistema: {capacidade}")
    logger.info("Cenário gerado com %d ondas de %d encomendas", len(cenario.waves), args.wave_size)
    return 0
