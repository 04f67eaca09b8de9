"""
Gêmeo digital do terminal de triagem (simulação de eventos discretos).

O transportador é um anel de velocidade constante: a encomenda entra no OCR
no instante τ_m e passa pela boca da rampa j em τ_m + τ̄_j + volta·lap_time.
As bocas das rampas são os únicos pontos de disputa. Cada rampa espiral tem
um servidor único (trabalhadores somados) que processa uma encomenda a cada
t_j / Σe milissegundos; a rampa de rejeição apenas conta encomendas.

A fila de eventos é ordenada por (tempo, prioridade do tipo, encomenda,
rampa), o que torna a simulação totalmente determinística.
"""
import heapq
import logging
from collections import deque
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Deque, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from optsort_core import (
    ChuteSpec, ConfigError, KpiReport, Layout, PlannedRejection, Scenario, SortPlan,
    WaveAllocation, Wave, WorkerProfile, parcel_admissibility,
)
from optsort_labor import StaffingPlan, build_roster, effective_process_times

logger = logging.getLogger(__name__)

SEM_RAMPA = -1


class EventKind(IntEnum):
    # O valor é a prioridade de desempate no mesmo milissegundo
    PROCESS_COMPLETE = 0
    CAGE_SWAP = 1
    PARCEL_ENTER = 2
    CHUTE_MOUTH_PASS = 3
    CHUTE_ENTER = 4
    REJECT = 5


@dataclass(frozen=True, order=True)
class SimEvent:
    time: int
    kind: EventKind
    parcel: int
    chute: int = SEM_RAMPA
    lap: int = 0


class FutureEventList:
    """Lista de eventos futuros (heap)"""

    def __init__(self):
        self._eventos: List[SimEvent] = []

    def schedule(self, evento: SimEvent):
        heapq.heappush(self._eventos, evento)

    def next_event(self) -> Optional[SimEvent]:
        if self._eventos:
            return heapq.heappop(self._eventos)
        return None

    def __len__(self):
        return len(self._eventos)


@dataclass
class ChuteState:
    spec: ChuteSpec
    process_ms: Optional[int]
    workers: Tuple[WorkerProfile, ...] = ()
    in_chute: int = 0
    pending: int = 0
    high_water: int = 0
    busy: bool = False
    processed: int = 0
    blockages: int = 0
    cage_swaps: int = 0
    fila: Deque[int] = field(default_factory=deque)
    cage_fill: Dict[int, int] = field(default_factory=dict)


@dataclass(frozen=True)
class Greedy:
    """Política GREEDY: entra na primeira rampa admissível livre, na ordem do anel"""
    name: str = "greedy"


@dataclass(frozen=True)
class OptsortAllocation:
    """Política OPTSORT: segue a alocação da onda"""
    allocation: WaveAllocation
    routing: PlannedRejection = PlannedRejection.FIRST_PASS
    name: str = "optsort"


Policy = Union[Greedy, OptsortAllocation]


@dataclass(frozen=True, eq=False)
class SimResult:
    policy: str
    wave_size: int
    parcels: pd.DataFrame
    blockages: pd.DataFrame
    high_water: Dict[int, int]
    cage_swaps: int
    elapsed_ms: int
    trace: Optional[pd.DataFrame] = None


@dataclass
class _EstadoEncomenda:
    destination: int
    entry_ms: int
    rota: List[int]
    posicao: int = 0
    exit_ms: Optional[int] = None
    chute: Optional[int] = None
    outcome: str = "on_belt"
    laps: int = 0


def sample_efficiencies(count: int, efficiency_range: Sequence[float], seed: int) -> List[WorkerProfile]:
    """
    Sorteia eficiências uniformes no intervalo, determinísticas por semente
    :param count: Número de trabalhadores
    :param efficiency_range: (mínimo, máximo), ambos positivos
    :param seed: Semente
    """
    lo, hi = float(efficiency_range[0]), float(efficiency_range[1])
    if lo <= 0 or hi < lo:
        raise ConfigError("workers.efficiency_range", "0 < mínimo ≤ máximo")
    rng = np.random.default_rng(seed)
    valores = rng.uniform(lo, hi, size=count)
    return [WorkerProfile(i, float(e)) for i, e in enumerate(valores)]


def simulate_wave(wave: Wave, layout: Layout, Q: np.ndarray, process_ms: Sequence[Optional[int]],
                  policy: Policy, cage_capacity: int = 40, horizon_ms: Optional[int] = None,
                  record_trace: bool = False, roster: Sequence[WorkerProfile] = ()) -> SimResult:
    """
    Executa uma onda no gêmeo digital
    :param wave: Onda de encomendas
    :param layout: Layout
    :param Q: Admissibilidade encomenda×rampa (colunas de ``layout.sort_chutes``)
    :param process_ms: Tempo efetivo por encomenda de cada rampa (None = sem equipe)
    :param policy: Greedy() ou OptsortAllocation(allocation)
    :param cage_capacity: Encomendas por gaiola
    :param horizon_ms: Eventos depois deste instante não são processados
    :param record_trace: Guarda o traço completo de eventos
    :param roster: Escala de trabalhadores (apenas informativa)
    """
    rampas = layout.sort_chutes
    rejeicao = layout.rejection_chute
    if rejeicao is None:
        raise ConfigError("chutes", "layout sem rampa de rejeição")
    coluna_por_id = {c.id: j for j, c in enumerate(rampas)}
    estados = [
        ChuteState(c, process_ms[j], tuple(w for w in roster if w.chute == c.id))
        for j, c in enumerate(rampas)
    ]
    volta = layout.lap_ms
    R = layout.max_reattempts
    tau_rej = rejeicao.travel_ms
    ordem_anel = sorted(range(len(rampas)), key=lambda j: (rampas[j].travel_ms, j))

    alocacao: Dict[int, int] = {}
    if isinstance(policy, OptsortAllocation):
        ids_onda = {p.id for p in wave.parcels}
        for pid, cid in policy.allocation.assignment.items():
            if pid not in ids_onda:
                raise ConfigError("allocation", f"encomenda {pid} não pertence à onda")
            if cid not in coluna_por_id:
                raise ConfigError("allocation", f"rampa {cid} não existe no layout")
            if process_ms[coluna_por_id[cid]] is None:
                raise ConfigError("allocation", f"rampa {cid} sem equipe recebeu encomendas")
            alocacao[pid] = coluna_por_id[cid]

    fel = FutureEventList()
    encomendas: Dict[int, _EstadoEncomenda] = {}
    for m, p in enumerate(wave.parcels):
        if isinstance(policy, Greedy):
            rota = [j for j in ordem_anel if Q[m, j] and process_ms[j] is not None]
        else:
            rota = [alocacao[p.id]] if p.id in alocacao else []
        encomendas[p.id] = _EstadoEncomenda(p.destination, p.entry_ms, rota)
        fel.schedule(SimEvent(p.entry_ms, EventKind.PARCEL_ENTER, p.id))

    traco: List[Tuple[int, str, int, Optional[int]]] = []
    bloqueios: List[Tuple[int, int, int]] = []
    swaps = 0
    ultimo_fim = 0

    def _passagem(pid: int, volta_idx: int, posicao: int):
        enc = encomendas[pid]
        enc.posicao = posicao
        j = enc.rota[posicao]
        t = enc.entry_ms + volta_idx * volta + rampas[j].travel_ms
        fel.schedule(SimEvent(t, EventKind.CHUTE_MOUTH_PASS, pid, rampas[j].id, volta_idx))

    def _rejeitar_apos(pid: int, agora: int):
        # Próxima passagem pela boca da rejeição a partir de agora
        enc = encomendas[pid]
        atraso = agora - enc.entry_ms - tau_rej
        volta_idx = 0 if atraso <= 0 else -(-atraso // volta)
        t = enc.entry_ms + volta_idx * volta + tau_rej
        fel.schedule(SimEvent(t, EventKind.REJECT, pid, rejeicao.id, volta_idx))

    def _falhou(pid: int, agora: int, volta_idx: int):
        enc = encomendas[pid]
        if enc.posicao + 1 < len(enc.rota):
            _passagem(pid, volta_idx, enc.posicao + 1)
        elif volta_idx < R:
            _passagem(pid, volta_idx + 1, 0)
        else:
            _rejeitar_apos(pid, agora)

    while len(fel):
        ev = fel.next_event()
        if horizon_ms is not None and ev.time > horizon_ms:
            break
        if record_trace:
            traco.append((ev.time, ev.kind.name, ev.parcel, None if ev.chute == SEM_RAMPA else ev.chute))
        enc = encomendas[ev.parcel]

        if ev.kind == EventKind.PARCEL_ENTER:
            if enc.rota:
                _passagem(ev.parcel, 0, 0)
            elif isinstance(policy, OptsortAllocation) and policy.routing == PlannedRejection.RECIRCULATE:
                t = enc.entry_ms + (R + 1) * volta + tau_rej
                fel.schedule(SimEvent(t, EventKind.REJECT, ev.parcel, rejeicao.id, R + 1))
            else:
                _rejeitar_apos(ev.parcel, ev.time)

        elif ev.kind == EventKind.CHUTE_MOUTH_PASS:
            estado = estados[coluna_por_id[ev.chute]]
            if estado.in_chute + estado.pending < estado.spec.capacity:
                estado.pending += 1
                fel.schedule(SimEvent(ev.time, EventKind.CHUTE_ENTER, ev.parcel, ev.chute, ev.lap))
            else:
                if isinstance(policy, OptsortAllocation):
                    estado.blockages += 1
                    bloqueios.append((ev.time, ev.parcel, ev.chute))
                    logger.debug("Bloqueio na rampa %d (encomenda %d, t=%d ms)", ev.chute, ev.parcel, ev.time)
                _falhou(ev.parcel, ev.time, ev.lap)

        elif ev.kind == EventKind.CHUTE_ENTER:
            estado = estados[coluna_por_id[ev.chute]]
            estado.pending -= 1
            estado.in_chute += 1
            estado.high_water = max(estado.high_water, estado.in_chute)
            estado.fila.append(ev.parcel)
            enc.exit_ms, enc.chute, enc.laps, enc.outcome = ev.time, ev.chute, ev.lap, "in_chute"
            if not estado.busy:
                estado.busy = True
                fel.schedule(SimEvent(ev.time + estado.process_ms, EventKind.PROCESS_COMPLETE,
                                      ev.parcel, ev.chute))

        elif ev.kind == EventKind.PROCESS_COMPLETE:
            estado = estados[coluna_por_id[ev.chute]]
            estado.fila.popleft()
            estado.in_chute -= 1
            estado.processed += 1
            enc.outcome = "processed"
            ultimo_fim = max(ultimo_fim, ev.time)
            cheio = estado.cage_fill.get(enc.destination, 0) + 1
            estado.cage_fill[enc.destination] = cheio
            if cheio >= cage_capacity:
                fel.schedule(SimEvent(ev.time, EventKind.CAGE_SWAP, ev.parcel, ev.chute))
            if estado.fila:
                fel.schedule(SimEvent(ev.time + estado.process_ms, EventKind.PROCESS_COMPLETE,
                                      estado.fila[0], ev.chute))
            else:
                estado.busy = False

        elif ev.kind == EventKind.CAGE_SWAP:
            estado = estados[coluna_por_id[ev.chute]]
            estado.cage_fill[enc.destination] = 0
            estado.cage_swaps += 1
            swaps += 1

        elif ev.kind == EventKind.REJECT:
            enc.exit_ms, enc.chute, enc.laps, enc.outcome = ev.time, ev.chute, ev.lap, "rejected"

    linhas = [{
        "parcel": pid,
        "destination": enc.destination + 1,
        "entry_ms": enc.entry_ms,
        "exit_ms": enc.exit_ms,
        "chute": enc.chute,
        "outcome": enc.outcome,
        "laps": enc.laps,
    } for pid, enc in encomendas.items()]
    df = pd.DataFrame(linhas, columns=["parcel", "destination", "entry_ms", "exit_ms", "chute", "outcome", "laps"])
    df = df.astype({"exit_ms": "Int64", "chute": "Int64"})
    resultado = SimResult(
        policy=policy.name,
        wave_size=wave.size,
        parcels=df,
        blockages=pd.DataFrame(bloqueios, columns=["time_ms", "parcel", "chute"]),
        high_water={e.spec.id: e.high_water for e in estados},
        cage_swaps=swaps,
        elapsed_ms=ultimo_fim,
        trace=pd.DataFrame(traco, columns=["time_ms", "kind", "parcel", "chute"]).astype({"chute": "Int64"})
        if record_trace else None,
    )
    logger.info("Onda simulada (%s): %d encomendas, %d bloqueios, fim em %d ms",
                policy.name, wave.size, len(bloqueios), ultimo_fim)
    return resultado


def run_simulation(scenario: Scenario, plan: SortPlan, staffing: StaffingPlan, policy: Policy,
                   seed: Optional[int] = None, wave_index: int = 0,
                   efficiencies: Optional[Sequence[float]] = None, horizon: Optional[float] = None,
                   record_trace: bool = False) -> SimResult:
    """
    Simula uma onda do cenário com o plano, a equipe e a política dados
    :param seed: Semente das eficiências (padrão: semente do cenário)
    :param efficiencies: Eficiências explícitas; se omitidas, são sorteadas
    :param horizon: Horizonte em segundos (padrão: até a última encomenda sair)
    """
    layout = scenario.layout
    if not 0 <= wave_index < len(scenario.waves):
        raise ConfigError("waves", f"onda {wave_index + 1} não existe no cenário")
    if plan.X.shape != (layout.n_destinations, layout.k):
        raise ConfigError("plan", "plano incompatível com o layout do cenário")
    if len(staffing.sigma) != layout.k:
        raise ConfigError("staffing", "alocação de equipe incompatível com o layout")
    if efficiencies is None:
        semente = scenario.seed if seed is None else seed
        perfis = sample_efficiencies(scenario.workers, scenario.efficiency_range, semente)
        efficiencies = [w.efficiency for w in perfis]
    onda = scenario.waves[wave_index]
    tempos = effective_process_times(layout, staffing, efficiencies)
    escala = build_roster(layout, staffing, efficiencies)
    horizonte = None if horizon is None else int(round(horizon * 1000))
    return simulate_wave(onda, layout, parcel_admissibility(onda, plan), tempos, policy,
                         scenario.cage_capacity, horizonte, record_trace, escala)


def compute_kpis(result: SimResult) -> KpiReport:
    """
    KPIs da onda simulada

    Rc conta encomendas que saíram do anel (rampa ou rejeição) depois de pelo
    menos uma volta extra; S_t é a média, em minutos, do tempo entre o OCR e a
    entrada numa rampa ou na rejeição.
    """
    df = result.parcels
    if df.empty:
        return KpiReport(0, 0, 0.0, 0.0, 0, 0, 0, result.wave_size, 0)
    sairam = df[df["exit_ms"].notna()]
    rejeitadas = int((df["outcome"] == "rejected").sum())
    processadas = int((df["outcome"] == "processed").sum())
    rc = int((sairam["laps"] >= 1).sum())
    if len(sairam):
        st_min = float((sairam["exit_ms"] - sairam["entry_ms"]).astype(float).mean()) / 60000.0
    else:
        st_min = 0.0
    pph = processadas / (result.elapsed_ms / 3_600_000) if result.elapsed_ms > 0 else 0.0
    return KpiReport(
        rc=rc,
        rj=rejeitadas,
        st_min=st_min,
        throughput_pph=pph,
        blockages=len(result.blockages),
        processed=processadas,
        in_system=result.wave_size - processadas - rejeitadas,
        wave_size=result.wave_size,
        laps=int(sairam["laps"].sum()),
    )


def trace_to_df(result: SimResult) -> pd.DataFrame:
    """Traço de eventos no formato time_ms,kind,parcel,chute"""
    if result.trace is None:
        return pd.DataFrame(columns=["time_ms", "kind", "parcel", "chute"])
    return result.trace
