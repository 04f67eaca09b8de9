"""Construtores de instâncias pequenas usadas pelos testes"""
from optsort_core import (
    ChuteKind, ChuteSpec, DemandForecast, Layout, Parcel, Scenario, Wave, to_ms,
)
from optsort_labor import staffing_for_plan
from optsort_planner import plan_shift


def criar_layout(k=2, capacity=2, process_time=10.0, n=1, dest_cap=None, chute_cap=None,
                 admissibility=None, max_reattempts=0, kinds=None, two_handler=(), wave_cap=None):
    """Rejeição a 1 s do OCR, rampa j a 2·j s e volta de 4·k s"""
    chutes = [ChuteSpec.rejection()]
    for j in range(k):
        tipo = kinds[j] if kinds else ChuteKind.SPIRAL
        chutes.append(ChuteSpec(
            j + 1, tipo,
            capacity=1 if tipo == ChuteKind.DIRECT else capacity,
            base_process_time=process_time,
            travel_time=2.0 * (j + 1),
            cage_slots=1,
            wave_cap=wave_cap,
            two_handler=j in two_handler,
        ))
    return Layout(
        chutes=tuple(chutes),
        lap_time=4.0 * k,
        n_destinations=n,
        dest_caps=tuple(dest_cap or [k] * n),
        chute_caps=tuple(chute_cap or [n] * k),
        admissibility=None if admissibility is None else tuple(tuple(l) for l in admissibility),
        max_reattempts=max_reattempts,
    )


def criar_onda(destinos, entradas, length=60.0):
    """Onda com ids 1..N; destinos 0-based e entradas em segundos"""
    return Wave(
        parcels=tuple(Parcel(m + 1, d, to_ms(t)) for m, (d, t) in enumerate(zip(destinos, entradas))),
        wave_length=length,
    )


def criar_cenario(layout, totais, ondas, workers=None, shift_length=3600.0, **opcoes):
    return Scenario(
        name="teste",
        layout=layout,
        forecast=DemandForecast(tuple(totais), shift_length),
        waves=tuple(ondas),
        workers=layout.k if workers is None else workers,
        **opcoes,
    )


def planejar(cenario):
    """Plano do turno e equipe gulosa do cenário"""
    plano = plan_shift(cenario.forecast, cenario.layout, cenario.objective_kind,
                       spillover=cenario.direct_spillover)
    _, equipe = staffing_for_plan(plano, cenario.layout, cenario.forecast.shift_length, cenario.workers)
    return plano, equipe
