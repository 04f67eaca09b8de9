"""
Arquivos de cenário (YAML) e gerador de cenários sintéticos.

Um cenário reúne layout, previsão de demanda, ondas de encomendas, equipe e
semente. O gerador reproduz a configuração de referência: 300 destinos,
30 rampas espirais, M_i = 5, N_j = 15, C_j = 50, t_j = 30 s, turno de
30000 s e 10 ondas de 3000 s.
"""
import logging
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import yaml

from optsort_core import (
    ChuteKind, ChuteSpec, ConfigError, DemandForecast, Layout, ObjectiveKind, Parcel,
    PlannedRejection, Scenario, Wave, system_peak_capacity, to_ms, validate_layout, validate_wave,
)

logger = logging.getLogger(__name__)

LAYOUT_KINDS = ("unrestricted", "restricted", "direct+restricted")
ARRIVAL_PROFILES = ("surge", "uniform")
DESTINATION_MIXES = ("forecast", "random")

_Loader = getattr(yaml, "CSafeLoader", yaml.SafeLoader)
_BaseDumper = getattr(yaml, "CSafeDumper", yaml.SafeDumper)


class _Dumper(_BaseDumper):
    pass


def _representar_lista(dumper, dados):
    # Listas de escalares em estilo de fluxo; cada linha de uma matriz vira uma lista de fluxo
    plana = all(not isinstance(v, (list, dict)) for v in dados)
    return dumper.represent_sequence("tag:yaml.org,2002:seq", dados, flow_style=True if plana else None)


_Dumper.add_representer(list, _representar_lista)


def _campo(dados: Dict, chave: str, caminho: str, padrao: Any = ...) -> Any:
    if not isinstance(dados, dict):
        raise ConfigError(caminho, "esperado um mapeamento")
    if chave not in dados:
        if padrao is ...:
            raise ConfigError(f"{caminho}.{chave}" if caminho else chave, "campo obrigatório")
        return padrao
    return dados[chave]


def _chute_from_dict(dados: Dict, caminho: str) -> ChuteSpec:
    try:
        tipo = ChuteKind(_campo(dados, "kind", caminho))
    except ValueError:
        raise ConfigError(f"{caminho}.kind", f"use um de {[k.value for k in ChuteKind]}")
    if tipo == ChuteKind.REJECTION:
        return ChuteSpec.rejection(int(_campo(dados, "id", caminho)), float(_campo(dados, "travel_time", caminho)))
    limite = _campo(dados, "wave_cap", caminho, None)
    return ChuteSpec(
        id=int(_campo(dados, "id", caminho)),
        kind=tipo,
        capacity=int(_campo(dados, "capacity", caminho)),
        base_process_time=float(_campo(dados, "process_time", caminho)),
        travel_time=float(_campo(dados, "travel_time", caminho)),
        cage_slots=int(_campo(dados, "cage_slots", caminho, 1)),
        wave_cap=None if limite is None else int(limite),
        two_handler=bool(_campo(dados, "two_handler", caminho, False)),
    )


def _chute_to_dict(c: ChuteSpec) -> Dict:
    if c.is_rejection:
        return {"id": c.id, "kind": c.kind.value, "travel_time": c.travel_time}
    return {
        "id": c.id,
        "kind": c.kind.value,
        "capacity": c.capacity,
        "process_time": c.base_process_time,
        "travel_time": c.travel_time,
        "cage_slots": c.cage_slots,
        "wave_cap": c.wave_cap,
        "two_handler": c.two_handler,
    }


def _wave_from_dict(dados: Dict, caminho: str, n: int) -> Wave:
    destinos = list(_campo(dados, "destinations", caminho))
    if "entry_ms" in dados:
        entradas = [int(t) for t in dados["entry_ms"]]
    else:
        entradas = [to_ms(t) for t in _campo(dados, "entry_times", caminho)]
    ids = list(_campo(dados, "ids", caminho, range(1, len(destinos) + 1)))
    if not len(destinos) == len(entradas) == len(ids):
        raise ConfigError(caminho, "destinations, entry_ms e ids com tamanhos diferentes")
    onda = Wave(
        parcels=tuple(Parcel(int(pid), int(d) - 1, t) for pid, d, t in zip(ids, destinos, entradas)),
        wave_length=float(_campo(dados, "length", caminho)),
    )
    violacoes = validate_wave(onda, n)
    if violacoes:
        raise ConfigError(f"{caminho}.{violacoes[0].field}", violacoes[0].rule)
    return onda


def scenario_from_dict(dados: Dict) -> Scenario:
    """
    Constrói e valida um cenário a partir do dicionário lido do YAML
    :param dados: Conteúdo do arquivo
    :return: Scenario
    """
    if not isinstance(dados, dict):
        raise ConfigError("cenario", "o arquivo deve conter um mapeamento")
    bruto_layout = _campo(dados, "layout", "")
    n = int(_campo(bruto_layout, "destinations", "layout"))
    chutes = tuple(_chute_from_dict(c, f"layout.chutes[{i}]")
                   for i, c in enumerate(_campo(bruto_layout, "chutes", "layout")))
    matriz = _campo(bruto_layout, "admissibility", "layout", None)
    layout = Layout(
        chutes=chutes,
        lap_time=float(_campo(bruto_layout, "lap_time", "layout")),
        n_destinations=n,
        dest_caps=tuple(int(m) for m in _campo(bruto_layout, "dest_caps", "layout")),
        chute_caps=tuple(int(v) for v in _campo(bruto_layout, "chute_caps", "layout")),
        admissibility=None if matriz is None else tuple(tuple(int(a) for a in linha) for linha in matriz),
        max_reattempts=int(_campo(bruto_layout, "max_reattempts", "layout", 0)),
    )
    violacoes = validate_layout(layout)
    if violacoes:
        for v in violacoes:
            logger.error("Layout inválido: %s", v)
        raise ConfigError(f"layout.{violacoes[0].field}", violacoes[0].rule)

    demanda = _campo(dados, "demand", "")
    previsao = DemandForecast(
        totals=tuple(int(b) for b in _campo(demanda, "totals", "demand")),
        shift_length=float(_campo(demanda, "shift_length", "demand")),
    )
    if previsao.n != n:
        raise ConfigError("demand.totals", f"{previsao.n} totais para {n} destinos")
    if any(b < 0 for b in previsao.totals):
        raise ConfigError("demand.totals", "B_i ≥ 0")
    if previsao.shift_length <= 0:
        raise ConfigError("demand.shift_length", "T > 0")

    ondas = tuple(_wave_from_dict(w, f"waves[{i}]", n) for i, w in enumerate(_campo(dados, "waves", "", [])))
    equipe = _campo(dados, "workers", "", {})
    faixa = tuple(float(e) for e in _campo(equipe, "efficiency_range", "workers", [1.0, 1.0]))
    if len(faixa) != 2 or faixa[0] <= 0 or faixa[1] < faixa[0]:
        raise ConfigError("workers.efficiency_range", "0 < mínimo ≤ máximo")
    opcoes = _campo(dados, "options", "", {})
    try:
        objetivo = ObjectiveKind(_campo(opcoes, "objective", "options", "parcels"))
        rota = PlannedRejection(_campo(opcoes, "planned_rejection", "options", "first_pass"))
    except ValueError as e:
        raise ConfigError("options", str(e))
    cap_bar = _campo(opcoes, "cap_bar", "options", None)
    return Scenario(
        name=str(_campo(dados, "name", "", "cenario")),
        layout=layout,
        forecast=previsao,
        waves=ondas,
        workers=int(_campo(equipe, "count", "workers", 0)),
        efficiency_range=faixa,
        seed=int(_campo(dados, "seed", "", 0)),
        cage_capacity=int(_campo(opcoes, "cage_capacity", "options", 40)),
        objective_kind=objetivo,
        planned_rejection=rota,
        direct_spillover=bool(_campo(opcoes, "direct_spillover", "options", True)),
        cap_bar=None if cap_bar is None else int(cap_bar),
    )


def scenario_to_dict(scenario: Scenario) -> Dict:
    """Dicionário pronto para YAML (destinos 1-based, entradas em ms)"""
    layout = scenario.layout
    return {
        "name": scenario.name,
        "seed": scenario.seed,
        "layout": {
            "lap_time": layout.lap_time,
            "max_reattempts": layout.max_reattempts,
            "destinations": layout.n_destinations,
            "dest_caps": list(layout.dest_caps),
            "chute_caps": list(layout.chute_caps),
            "admissibility": None if layout.admissibility is None else [list(l) for l in layout.admissibility],
            "chutes": [_chute_to_dict(c) for c in layout.chutes],
        },
        "demand": {
            "shift_length": scenario.forecast.shift_length,
            "totals": list(scenario.forecast.totals),
        },
        "waves": [{
            "length": w.wave_length,
            "ids": [p.id for p in w.parcels],
            "destinations": [p.destination + 1 for p in w.parcels],
            "entry_ms": [p.entry_ms for p in w.parcels],
        } for w in scenario.waves],
        "workers": {
            "count": scenario.workers,
            "efficiency_range": list(scenario.efficiency_range),
        },
        "options": {
            "cage_capacity": scenario.cage_capacity,
            "objective": scenario.objective_kind.value,
            "planned_rejection": scenario.planned_rejection.value,
            "direct_spillover": scenario.direct_spillover,
            "cap_bar": scenario.cap_bar,
        },
    }


def load_scenario(path) -> Scenario:
    """
    Lê e valida um arquivo de cenário
    :param path: Caminho do YAML
    :return: Scenario
    """
    with open(path, "r", encoding="utf-8") as f:
        try:
            dados = yaml.load(f, Loader=_Loader)
        except yaml.YAMLError as e:
            raise ConfigError(str(path), f"YAML inválido: {e}")
    cenario = scenario_from_dict(dados)
    logger.info("Cenário %s carregado: %d destinos, %d rampas, %d ondas",
                cenario.name, cenario.layout.n_destinations, cenario.layout.k, len(cenario.waves))
    return cenario


def save_scenario(scenario: Scenario, path) -> None:
    """Grava o cenário em YAML (listas numéricas em estilo de fluxo)"""
    with open(path, "w", encoding="utf-8") as f:
        yaml.dump(scenario_to_dict(scenario), f, Dumper=_Dumper, sort_keys=False,
                  allow_unicode=True, width=120)


def _zonas(total: int, zonas: int) -> List[int]:
    return [i * zonas // total for i in range(total)]


def _pesos_da_onda(rng: np.random.Generator, pesos: np.ndarray, mix: str) -> np.ndarray:
    if mix == "forecast":
        return pesos
    ativos = np.flatnonzero(pesos > 0)
    sorteio = np.zeros_like(pesos)
    sorteio[ativos] = rng.dirichlet(np.ones(len(ativos)))
    return sorteio


def _entradas_da_onda(rng: np.random.Generator, tamanho: int, horizonte: int, perfil: str,
                      fracao: float, janela: float) -> np.ndarray:
    """Instantes de entrada (ms) ordenados de uma onda"""
    if perfil == "uniform":
        return np.sort(rng.integers(0, max(horizonte, 1), size=tamanho))
    pico = int(round(fracao * tamanho))
    inicio = rng.integers(0, max(int(janela * horizonte), 1), size=pico)
    meio = horizonte // 2
    fim = rng.integers(meio, max(horizonte, meio + 1), size=tamanho - pico)
    return np.sort(np.concatenate([inicio, fim]))


def generate_scenario(n: int = 300, k: int = 30, load: int = 29335, kind: str = "unrestricted",
                      seed: int = 7, waves: int = 10, wave_size: int = 2523, dest_cap: int = 5,
                      chute_cap: int = 15, capacity: int = 50, process_time: float = 30.0,
                      shift_length: float = 30000.0, wave_length: float = 3000.0,
                      workers: Optional[int] = None,
                      efficiency_range: Sequence[float] = (1.0, 1.0),
                      name: Optional[str] = None, arrival_profile: str = "surge",
                      destination_mix: str = "forecast", surge_share: float = 0.62,
                      surge_span: float = 0.2) -> Scenario:
    """
    Gera um cenário sintético

    Demanda multinomial uniforme sobre os destinos. Rampa j fica a 2·j s do
    OCR, a rejeição a 1 s, e a volta dura duas vezes a maior distância.
    Cada onda sorteia destinos e instantes de entrada (ordenados):

    - destination_mix 'forecast': destinos proporcionais à demanda prevista;
      'random': perfil de carga aleatório por onda (pesos Dirichlet sobre os
      destinos com demanda), que não segue a previsão.
    - arrival_profile 'surge': uma fração surge_share da onda entra em
      [0, surge_span·T_w) e o restante em [T_w/2, T_w); 'uniform': entradas
      uniformes em [0, T_w).
    :param kind: 'unrestricted', 'restricted' (zonas em blocos) ou
                 'direct+restricted' (última rampa de cada zona vira direta)
    """
    if kind not in LAYOUT_KINDS:
        raise ConfigError("kind", f"use um de {LAYOUT_KINDS}")
    if arrival_profile not in ARRIVAL_PROFILES:
        raise ConfigError("arrival_profile", f"use um de {ARRIVAL_PROFILES}")
    if destination_mix not in DESTINATION_MIXES:
        raise ConfigError("destination_mix", f"use um de {DESTINATION_MIXES}")
    if not 0.0 <= surge_share <= 1.0:
        raise ConfigError("surge_share", "0 ≤ surge_share ≤ 1")
    if not 0.0 < surge_span <= 0.5:
        raise ConfigError("surge_span", "0 < surge_span ≤ 0.5")
    if n < 1 or k < 1 or load < 0 or waves < 0 or wave_size < 0:
        raise ConfigError("generate", "parâmetros devem ser positivos")
    rng = np.random.default_rng(seed)
    totais = rng.multinomial(load, [1.0 / n] * n)

    zonas = min(5, n, k)
    zona_destino = _zonas(n, zonas)
    zona_rampa = _zonas(k, zonas)
    diretas = set()
    if kind == "direct+restricted":
        for z in range(zonas):
            diretas.add(max(j for j in range(k) if zona_rampa[j] == z))

    chutes = [ChuteSpec.rejection()]
    for j in range(k):
        if j in diretas:
            chutes.append(ChuteSpec(j + 1, ChuteKind.DIRECT, capacity=1, base_process_time=3.0,
                                    travel_time=2.0 * (j + 1), cage_slots=1))
        else:
            chutes.append(ChuteSpec(j + 1, ChuteKind.SPIRAL, capacity=capacity, base_process_time=process_time,
                                    travel_time=2.0 * (j + 1), cage_slots=chute_cap))
    matriz = None
    if kind != "unrestricted":
        matriz = tuple(tuple(int(zona_destino[i] == zona_rampa[j]) for j in range(k)) for i in range(n))
    layout = Layout(
        chutes=tuple(chutes),
        lap_time=2 * 2.0 * k,
        n_destinations=n,
        dest_caps=(dest_cap,) * n,
        chute_caps=tuple(1 if j in diretas else chute_cap for j in range(k)),
        admissibility=matriz,
        max_reattempts=0,
    )
    capacidade = system_peak_capacity(layout, shift_length)
    if load > capacidade:
        logger.warning("Carga %d acima da capacidade do sistema (%d)", load, capacidade)

    pesos = totais / totais.sum() if totais.sum() > 0 else np.full(n, 1.0 / n)
    horizonte = to_ms(wave_length)
    ondas = []
    for _ in range(waves):
        destinos = rng.choice(n, size=wave_size, p=_pesos_da_onda(rng, pesos, destination_mix))
        entradas = _entradas_da_onda(rng, wave_size, horizonte, arrival_profile, surge_share, surge_span)
        ondas.append(Wave(
            parcels=tuple(Parcel(m + 1, int(d), int(t)) for m, (d, t) in enumerate(zip(destinos, entradas))),
            wave_length=wave_length,
        ))

    espirais = k - len(diretas)
    return Scenario(
        name=name or f"{kind}-n{n}-k{k}-s{seed}",
        layout=layout,
        forecast=DemandForecast(tuple(int(b) for b in totais), shift_length),
        waves=tuple(ondas),
        workers=espirais if workers is None else workers,
        efficiency_range=(float(efficiency_range[0]), float(efficiency_range[1])),
        seed=seed,
    )


if __name__ == '__main__':
    cenario = generate_scenario()
    print(f"Cenário: {cenario.name}")
    print(f"Carga: {cenario.forecast.total}  capacidade: {system_peak_capacity(cenario.layout, 30000)}")
    print(f"Ondas: {len(cenario.waves)} x {cenario.waves[0].size} encomendas")
