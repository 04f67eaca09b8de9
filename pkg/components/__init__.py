# Inicialização do pacote components
